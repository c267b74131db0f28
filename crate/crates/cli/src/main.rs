fn main() {
    std::process::exit(seqnorm_cli::run(std::env::args_os()));
}
