fn main() {
    std::process::exit(rvalued::cli::main(std::env::args_os()));
}
