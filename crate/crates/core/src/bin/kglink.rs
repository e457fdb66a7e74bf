fn main() {
    std::process::exit(kglink::cli::main());
}
