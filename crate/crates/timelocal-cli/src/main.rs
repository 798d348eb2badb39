fn main() {
    eprintln!("timelocal: command set not wired up yet");
    std::process::exit(2);
}
