fn main() {
    std::process::exit(paneitz_lab::run_from(std::env::args_os()));
}
