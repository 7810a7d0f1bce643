fn main() {
    // CLI wiring lands once the library modules are in place.
    eprintln!("qscar: not yet wired");
    std::process::exit(2);
}
