fn main() {
    loco_core::cli::main();
}
