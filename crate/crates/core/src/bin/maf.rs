fn main() {
    std::process::exit(maf::cli::main());
}
