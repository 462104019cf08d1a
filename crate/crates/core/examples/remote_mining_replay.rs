//! Mines GitHub offline from the recorded exchanges bundled with the crate.
use std::sync::Arc;

use skill_corpus::miner::{collect_query_tokens, mine_remote, GithubClient, MineRemoteOptions, MiningState, ReplayTransport};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/github");
    let corpus = std::fs::read_to_string(dir.join("token_corpus/open_views.il"))?;
    let tokens = collect_query_tokens(&[corpus.as_str()], 10, 1.0, 0);
    println!("query tokens: {tokens:?}");
    let client = GithubClient::new(Arc::new(ReplayTransport::load(&dir.join("replay.json"))?)).with_sleeper(|_| {});
    let options = MineRemoteOptions { tokens, ..MineRemoteOptions::default() };
    let outcome = mine_remote(&client, &options, MiningState::default())?;
    for m in &outcome.kept {
        println!("kept   {:?} {}", m.origin, m.file.url);
    }
    for r in &outcome.rejections {
        println!("reject {:?} {} ({})", r.stage, r.url, r.reason);
    }
    Ok(())
}
