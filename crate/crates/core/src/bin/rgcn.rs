fn main() {
    env_logger::init();
    std::process::exit(rgcn::cli::run(std::env::args_os()));
}
