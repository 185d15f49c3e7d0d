fn main() {
    std::process::exit(sheetlab_cli::run(std::env::args_os()));
}
