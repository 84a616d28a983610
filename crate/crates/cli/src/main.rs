fn main() {
    std::process::exit(qsl_lab::run(std::env::args_os()));
}
