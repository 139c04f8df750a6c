fn main() {
    std::process::exit(optsample::app::run(std::env::args_os()));
}
