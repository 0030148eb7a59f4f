fn main() {
    std::process::exit(siaflow::run(std::env::args_os()));
}
