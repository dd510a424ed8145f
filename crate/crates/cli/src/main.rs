fn main() {
    std::process::exit(vfusion_cli::main_with_args(std::env::args_os()));
}
