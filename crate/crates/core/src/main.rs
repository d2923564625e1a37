fn main() { std::process::exit(qhj::cli::run()) }
