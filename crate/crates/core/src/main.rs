fn main() {
    std::process::exit(nanofab::cli::main_with_args(std::env::args_os()));
}
