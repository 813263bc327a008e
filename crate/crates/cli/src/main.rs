fn main() {
    std::process::exit(gpcid::main_with_args(std::env::args_os()));
}
