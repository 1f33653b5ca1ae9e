fn main() {
    std::process::exit(latent_elites::cli::run_from(std::env::args_os()));
}
