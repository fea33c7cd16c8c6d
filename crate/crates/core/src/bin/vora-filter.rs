fn main() {
    std::process::exit(vora_filter::cli::main_with_args(std::env::args_os()));
}
