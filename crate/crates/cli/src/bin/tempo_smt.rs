fn main() {
    std::process::exit(tempo_solver::cli_main());
}
