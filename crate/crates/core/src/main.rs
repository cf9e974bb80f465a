fn main() {
    std::process::exit(cdsbounds::app::main_with_args(std::env::args_os()));
}
