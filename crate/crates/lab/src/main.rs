fn main() {
    std::process::exit(avagrad_lab::cli::main());
}
