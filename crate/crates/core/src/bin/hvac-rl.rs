fn main() {
    std::process::exit(hvac_rl::harness::cli::main_with(std::env::args_os()));
}
