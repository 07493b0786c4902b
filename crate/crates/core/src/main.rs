fn main() {
    std::process::exit(hopf_eikonal::cli::run());
}
