fn main() {
    std::process::exit(iacopt::cli::main(std::env::args_os()));
}
