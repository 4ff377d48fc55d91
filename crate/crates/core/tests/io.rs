mod common;

use std::path::Path;

use proptest::prelude::*;
use texscore::io::{decode_pgm, encode_pgm, load_pgm, write_pgm, Manifest, DEFAULT_LABELS};
use texscore::texture::GrayImage;
use texscore::Error;

use common::{fuzz_base, pgm_fuzz_corpus, FUZZ_HEIGHT, FUZZ_WIDTH};

#[test]
fn fuzz_base_is_valid() {
    let img = decode_pgm(&fuzz_base()).unwrap();
    assert_eq!((img.width(), img.height()), (FUZZ_WIDTH, FUZZ_HEIGHT));
}

#[test]
fn every_header_mutation_is_rejected() {
    let corpus = pgm_fuzz_corpus();
    assert_eq!(corpus.len(), 100);
    for (i, bytes) in corpus.iter().enumerate() {
        let outcome = std::panic::catch_unwind(|| decode_pgm(bytes));
        match outcome {
            Ok(Err(Error::Parse { offset, .. })) => {
                assert!(offset <= bytes.len(), "case {i}: offset past end")
            }
            Ok(Err(e)) => panic!("case {i}: unexpected error kind {e:?}"),
            Ok(Ok(_)) => panic!(
                "case {i} accepted: {:?}",
                String::from_utf8_lossy(&bytes[..bytes.len().min(24)])
            ),
            Err(_) => panic!("case {i} panicked"),
        }
    }
}

#[test]
fn error_offsets() {
    let mut f = b"P5\n4 4\n255\n".to_vec();
    f.extend([1u8; 10]);
    assert!(matches!(decode_pgm(&f), Err(Error::Parse { offset, .. }) if offset == f.len()));
    let bad_max = b"P5\n2 2\n65535\n\0\0\0\0\0\0\0\0";
    assert!(matches!(
        decode_pgm(bad_max),
        Err(Error::Parse { offset: 7, .. })
    ));
}

#[test]
fn file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let img = GrayImage::new(3, 2, vec![0, 1, 2, 253, 254, 255]).unwrap();
    let path = dir.path().join("a.pgm");
    write_pgm(&path, &img).unwrap();
    assert_eq!(load_pgm(&path).unwrap(), img);
    assert!(load_pgm(dir.path().join("missing.pgm")).is_err());
}

#[test]
fn manifest_parsing() {
    let base = Path::new("/data");
    let m = Manifest::parse(
        "path,label\na.pgm,0\nsub/b.pgm,3\nc.pgm,\n",
        base,
        &DEFAULT_LABELS,
    )
    .unwrap();
    assert_eq!(m.len(), 3);
    assert_eq!(m.entries[1].path, Path::new("/data/sub/b.pgm"));
    assert_eq!(m.entries[1].label, Some(3));
    assert_eq!(m.entries[2].label, None);
    assert_eq!(
        Manifest::parse(&m.to_csv(base), base, &DEFAULT_LABELS).unwrap(),
        m
    );

    let line_of = |text: &str| match Manifest::parse(text, base, &DEFAULT_LABELS) {
        Err(Error::Format { line, .. }) => line,
        other => panic!("expected a format error, got {other:?}"),
    };
    assert_eq!(line_of("file,label\na.pgm,0\n"), 1);
    assert_eq!(line_of("path,label\na.pgm,0\nb.pgm,7\n"), 3);
    assert_eq!(line_of("path,label\na.pgm,0\na.pgm,1\n"), 3);
    assert_eq!(line_of("path,label\na.pgm,x\n"), 2);
    assert_eq!(line_of("path,label\n,1\n"), 2);
    assert!(Manifest::parse("path,label\nb.pgm,7\n", base, &[5, 7]).is_ok());
}

proptest! {
    #[test]
    fn pgm_round_trip(w in 1usize..40, h in 1usize..40, seed: u64) {
        let px: Vec<u8> = (0..w * h).map(|i| (seed.wrapping_mul(i as u64 + 1) >> 13) as u8).collect();
        let img = GrayImage::new(w, h, px).unwrap();
        prop_assert_eq!(decode_pgm(&encode_pgm(&img)).unwrap(), img);
    }

    #[test]
    fn arbitrary_bytes_never_panic(bytes in prop::collection::vec(any::<u8>(), 0..64)) {
        let _ = decode_pgm(&bytes);
    }

    #[test]
    fn comments_anywhere_in_header(gap in prop::sample::select(vec![" ", "\n", "\t", " # note\n", "\n#\n", "  \r\n"])) {
        let mut f = format!("P5{gap}2{gap}1{gap}255\n").into_bytes();
        f.extend([9, 8]);
        let img = decode_pgm(&f).unwrap();
        prop_assert_eq!(img.pixels(), &[9, 8]);
    }
}
