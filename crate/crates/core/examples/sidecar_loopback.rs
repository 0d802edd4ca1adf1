//! The sidecar wire protocol end to end: a reference server backed by mock
//! predictors on a local TCP port, a client, and the conformance suite.
//!
//! To check a real sidecar instead, export ACTIVE_PETS_SIDECAR=host:port and
//! pass a member name: cargo run --example sidecar_loopback -- deberta-large

use std::collections::BTreeMap;
use std::io::{BufReader, BufWriter};
use std::net::TcpListener;
use std::thread;

use active_pets::predictor::sidecar::{conformance, serve};
use active_pets::predictor::{EmbeddingKind, MockConfig, MockPredictor, Predictor, SidecarClient};
use active_pets::synthetic::SyntheticSpec;
use active_pets::{Instance, Pool};

fn main() -> active_pets::Result<()> {
    let (mut client, member) = match std::env::args().nth(1) {
        Some(member) => (
            SidecarClient::from_env()?.expect("ACTIVE_PETS_SIDECAR is not set"),
            member,
        ),
        None => {
            let listener = TcpListener::bind("127.0.0.1:0").expect("bind");
            let addr = listener.local_addr().expect("addr").to_string();
            thread::spawn(move || {
                let mut registry: BTreeMap<String, Box<dyn Predictor>> = BTreeMap::new();
                registry.insert(
                    "mock-large".into(),
                    Box::new(MockPredictor::new(MockConfig::for_member(
                        "mock-large",
                        24,
                        1,
                    ))),
                );
                for stream in listener.incoming().flatten() {
                    let reader = BufReader::new(stream.try_clone().expect("clone"));
                    if let Err(e) = serve(reader, BufWriter::new(stream), &mut registry) {
                        eprintln!("server: {e}");
                    }
                }
            });
            println!("reference sidecar on {addr}");
            (SidecarClient::connect_tcp(&addr)?, "mock-large".to_string())
        }
    };

    let pool = Pool::new(SyntheticSpec::balanced(4, 2).generate())?;
    let insts: Vec<&Instance> = pool.instances().collect();
    let bundles = client.predict(&member, &[EmbeddingKind::Representation], &insts[..2])?;
    println!(
        "predict -> {:?} ({} representation dims)",
        bundles[0].proba,
        bundles[0].representation.as_ref().map_or(0, Vec::len)
    );

    let mut failed = 0;
    for check in conformance::run(&mut client, &member) {
        println!(
            "{} {:<28} {}",
            if check.passed { "ok  " } else { "FAIL" },
            check.name,
            check.detail
        );
        failed += usize::from(!check.passed);
    }
    if failed > 0 {
        std::process::exit(1);
    }
    Ok(())
}
