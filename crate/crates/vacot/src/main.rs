fn main() {
    std::process::exit(vacot::cli::run(std::env::args_os()));
}
