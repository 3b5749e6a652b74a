fn main() {
    std::process::exit(arcf::cli::run_cli(std::env::args_os()));
}
