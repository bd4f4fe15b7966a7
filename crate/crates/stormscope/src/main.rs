fn main() {
    std::process::exit(stormscope::cli::run(std::env::args_os()));
}
