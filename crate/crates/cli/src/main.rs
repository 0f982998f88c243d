fn main() {
    std::process::exit(nhbloch::run(std::env::args_os()));
}
