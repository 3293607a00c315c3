fn main() {
    std::process::exit(metaflora_cli::run(std::env::args_os()));
}
