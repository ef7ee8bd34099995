fn main() {
    std::process::exit(adaptive_bfs::cli::main());
}
