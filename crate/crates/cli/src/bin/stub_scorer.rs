//! Reference scorer speaking the line protocol. Scores are lexical overlap,
//! so results can be checked against the built-in scorer. Flags inject the
//! failure modes a real model server can exhibit.

use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::net::TcpListener;
use std::process::ExitCode;

use clap::Parser;
use serde::Deserialize;
use serde_json::json;
use slide_core::scoring::lexical_overlap;

#[derive(Debug, Parser)]
#[command(name = "slide-stub-scorer")]
struct Args {
    /// Serve one TCP connection on this address instead of stdin/stdout.
    /// The bound address is printed to stderr.
    #[arg(long)]
    listen: Option<String>,
    /// Hold replies until this many requests are pending (or no more input
    /// is buffered), then answer them in reverse order.
    #[arg(long, default_value_t = 1)]
    reorder: usize,
    /// Reply with an error for this request id.
    #[arg(long)]
    fail_on: Option<u64>,
    /// Reply with a malformed line for this request id.
    #[arg(long)]
    garble_on: Option<u64>,
    /// Exit without answering once this request id arrives.
    #[arg(long)]
    crash_on: Option<u64>,
    /// Never send the ready handshake.
    #[arg(long)]
    no_handshake: bool,
    #[arg(long, default_value = "stub-lexical-overlap")]
    name: String,
}

#[derive(Deserialize)]
struct Request {
    id: u64,
    src: String,
    hyp: String,
}

fn serve(args: &Args, input: impl Read, output: impl Write) -> io::Result<u8> {
    let mut out = BufWriter::new(output);
    if !args.no_handshake {
        writeln!(out, "{}", json!({"ready": true, "name": args.name}))?;
        out.flush()?;
    }
    let mut pending: Vec<Request> = Vec::new();
    let reply = |out: &mut BufWriter<_>, r: &Request| -> io::Result<()> {
        if Some(r.id) == args.fail_on {
            writeln!(out, "{}", json!({"id": r.id, "error": "injected failure"}))
        } else if Some(r.id) == args.garble_on {
            writeln!(out, "{{\"id\": {}, \"score\": ", r.id)
        } else {
            let score = lexical_overlap(&r.src, &r.hyp);
            writeln!(out, "{}", json!({"id": r.id, "score": score}))
        }
    };
    let mut reader = BufReader::new(input);
    let mut line = String::new();
    loop {
        line.clear();
        if reader.read_line(&mut line)? == 0 {
            break;
        }
        if line.trim().is_empty() {
            continue;
        }
        let req: Request = match serde_json::from_str(&line) {
            Ok(r) => r,
            Err(e) => {
                writeln!(out, "{}", json!({"id": null, "error": format!("malformed request: {e}")}))?;
                out.flush()?;
                return Ok(1);
            }
        };
        if Some(req.id) == args.crash_on {
            out.flush()?;
            return Ok(3);
        }
        pending.push(req);
        if pending.len() >= args.reorder || reader.buffer().is_empty() {
            for r in pending.drain(..).rev() {
                reply(&mut out, &r)?;
            }
            out.flush()?;
        }
    }
    for r in pending.drain(..).rev() {
        reply(&mut out, &r)?;
    }
    out.flush()?;
    Ok(0)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result = match &args.listen {
        Some(addr) => (|| {
            let listener = TcpListener::bind(addr)?;
            eprintln!("listening on {}", listener.local_addr()?);
            let (stream, _) = listener.accept()?;
            let input = stream.try_clone()?;
            serve(&args, input, stream)
        })(),
        None => serve(&args, io::stdin().lock(), io::stdout().lock()),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("slide-stub-scorer: {e}");
            ExitCode::from(1)
        }
    }
}
