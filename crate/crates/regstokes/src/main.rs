fn main() {
    std::process::exit(regstokes::cli::main(std::env::args_os()));
}
