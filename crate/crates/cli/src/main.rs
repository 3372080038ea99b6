fn main() {
    std::process::exit(owlscreen_cli::run(std::env::args_os().collect()));
}
