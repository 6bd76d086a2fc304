fn main() {
    std::process::exit(pbm_lab::cli::main_from_env());
}
