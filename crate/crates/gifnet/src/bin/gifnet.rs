fn main() {
    std::process::exit(gifnet::run_cli());
}
