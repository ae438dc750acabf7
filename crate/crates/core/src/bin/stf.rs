fn main() {
    std::process::exit(spacetime_forecast::cli::run(std::env::args_os()));
}
