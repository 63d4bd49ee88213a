fn main() {
    std::process::exit(crowdsim::run(std::env::args_os()));
}
