fn main() {
    std::process::exit(seqdetect_cli::run_from_args(std::env::args_os()));
}
