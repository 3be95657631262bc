fn main() {
    std::process::exit(ridepool::cli::run(std::env::args_os()));
}
