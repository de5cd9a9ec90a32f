fn main() {
    std::process::exit(parlay_kelly::cli::main_entry());
}
