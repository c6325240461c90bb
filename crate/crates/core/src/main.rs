fn main() {
    if let Err(e) = mqsim::cli::init_thread_pool() {
        eprintln!("error: {e}");
        std::process::exit(mqsim::cli::EXIT_CONFIG);
    }
    std::process::exit(mqsim::cli::run(std::env::args_os()));
}
