fn main() {
    std::process::exit(darkstate_cli::main_impl(std::env::args_os()));
}
