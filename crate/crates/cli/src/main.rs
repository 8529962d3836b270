fn main() {
    std::process::exit(newsgauge::run(std::env::args_os()));
}
