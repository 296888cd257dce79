fn main() {
    std::process::exit(squeezefilter::cli::run_command(std::env::args_os()));
}
