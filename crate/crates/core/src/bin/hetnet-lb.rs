fn main() {
    std::process::exit(hetnet_lb::cli::main(std::env::args_os()));
}
