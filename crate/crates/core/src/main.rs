fn main() {
    std::process::exit(sturm_admissible::cli::run(std::env::args_os()));
}
