use std::fs;
use std::path::{Path, PathBuf};

use lungfield::datasets::{scan_dataset, write_synth, ScanOptions, SynthConfig, SynthManifest};
use lungfield::imaging::{read_png, write_png, Image2D};
use lungfield::Error;

fn write(dir: &Path, name: &str, img: &Image2D) {
    fs::create_dir_all(dir).unwrap();
    write_png(&dir.join(name), img).unwrap();
}

fn half(left: bool) -> Image2D {
    Image2D::from_fn(12, 10, |x, y| if (x < 6) == left && y > 1 && y < 8 { 255 } else { 0 })
}

fn xray(seed: u8) -> Image2D {
    Image2D::from_fn(12, 10, |x, y| (x as u8 * 9).wrapping_add(y as u8 * 3).wrapping_add(seed))
}

/// Image dir plus separate left- and right-lung mask dirs; one image lacks a right mask.
fn montgomery(root: &Path) -> ScanOptions {
    let images = root.join("CXR_png");
    let left = root.join("ManualMask/leftMask");
    let right = root.join("ManualMask/rightMask");
    for i in 1..=4u8 {
        let stem = format!("MCUCXR_{i:04}_0");
        write(&images, &format!("{stem}.png"), &xray(i));
        write(&left, &format!("{stem}.png"), &half(true));
        if i != 4 {
            write(&right, &format!("{stem}.png"), &half(false));
        }
    }
    write(&right, "MCUCXR_0099_0.png", &half(false));
    fs::write(images.join("notes.txt"), "not an image").unwrap();
    ScanOptions::new(images, vec![left, right], "montgomery")
}

#[test]
fn montgomery_layout_pairs_and_merges_masks() {
    let dir = tempfile::tempdir().unwrap();
    let opts = montgomery(dir.path());
    let report = scan_dataset(&opts).unwrap();
    let ids: Vec<&str> = report.pairs.iter().map(|p| p.id.as_str()).collect();
    assert_eq!(ids, ["MCUCXR_0001_0", "MCUCXR_0002_0", "MCUCXR_0003_0"]);
    assert_eq!(report.unpaired_images, ["MCUCXR_0004_0"]);
    assert_eq!(report.unpaired_masks.len(), 1);
    let union = half(true).union(&half(false)).unwrap();
    for p in &report.pairs {
        assert_eq!(p.mask, union);
        assert_eq!(p.source, "montgomery");
    }
    assert_eq!(report.pairs[1].image, xray(2));

    let mut swapped = opts.clone();
    swapped.mask_dirs.reverse();
    let again = scan_dataset(&swapped).unwrap();
    assert_eq!(again.pairs, report.pairs);
}

#[test]
fn shenzhen_suffix_rule() {
    let dir = tempfile::tempdir().unwrap();
    let images = dir.path().join("img");
    let masks = dir.path().join("mask");
    for i in 0..3u8 {
        write(&images, &format!("CHNCXR_{i:04}_0.png"), &xray(i));
    }
    // 0/1-valued mask files are accepted as binary.
    let ones = Image2D::from_fn(12, 10, |x, _| (x > 5) as u8);
    write(&masks, "CHNCXR_0000_0_mask.png", &ones);
    write(&masks, "CHNCXR_0002_0_mask.png", &half(true));
    let report = scan_dataset(&ScanOptions::new(&images, vec![masks.clone()], "shenzhen")).unwrap();
    assert_eq!(report.pairs.len(), 2);
    assert_eq!(report.pairs[0].mask, ones.binarized());
    assert_eq!(report.unpaired_images, ["CHNCXR_0001_0"]);

    let mut exact = ScanOptions::new(&images, vec![masks], "shenzhen");
    exact.mask_suffix = None;
    assert!(matches!(scan_dataset(&exact), Err(Error::NoPairs { .. })));
}

#[test]
fn empty_mask_dirs_list_every_image() {
    let dir = tempfile::tempdir().unwrap();
    let images = dir.path().join("img");
    let masks = dir.path().join("mask");
    fs::create_dir_all(&masks).unwrap();
    for i in 0..3u8 {
        write(&images, &format!("{i}.png"), &xray(i));
    }
    match scan_dataset(&ScanOptions::new(&images, vec![masks], "x")) {
        Err(Error::NoPairs { unpaired_images }) => assert_eq!(unpaired_images, ["0", "1", "2"]),
        other => panic!("expected NoPairs, got {other:?}"),
    }
}

#[test]
fn duplicate_stems_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let images = dir.path().join("img");
    let masks = dir.path().join("mask");
    write(&images, "a.png", &xray(0));
    write(&masks, "a.png", &half(true));
    write(&masks, "a_mask.png", &half(false));
    match scan_dataset(&ScanOptions::new(&images, vec![masks.clone()], "x")) {
        Err(Error::DuplicateStem { stem, dir }) => {
            assert_eq!(stem, "a");
            assert_eq!(dir, masks);
        }
        other => panic!("expected DuplicateStem, got {other:?}"),
    }
}

#[test]
fn mismatched_mask_size_names_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let images = dir.path().join("img");
    let masks = dir.path().join("mask");
    write(&images, "a.png", &xray(0));
    write(&masks, "a.png", &Image2D::filled(5, 5, 0));
    match scan_dataset(&ScanOptions::new(&images, vec![masks.clone()], "x")) {
        Err(Error::Decode { path, .. }) => assert_eq!(path, Some(masks.join("a.png"))),
        other => panic!("expected a decode error, got {other:?}"),
    }
    let missing = ScanOptions::new(dir.path().join("nope"), vec![masks], "x");
    assert!(scan_dataset(&missing).is_err());
}

#[test]
fn synthetic_directory_round_trips_through_the_scanner() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SynthConfig {
        count: 5,
        size: 32,
        seed: 7,
        ..Default::default()
    };
    let pairs = write_synth(dir.path(), &cfg).unwrap();
    let manifest: SynthManifest =
        serde_json::from_slice(&fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.config, cfg);
    assert_eq!(manifest.ids, ["0000", "0001", "0002", "0003", "0004"]);

    let scanned = scan_dataset(&ScanOptions::new(dir.path().join("images"), vec![dir.path().join("masks")], "synth"))
        .unwrap()
        .pairs;
    assert_eq!(scanned, pairs);
    let first: PathBuf = dir.path().join("images/0000.png");
    assert_eq!(read_png(&first).unwrap(), pairs[0].image);

    let empty = tempfile::tempdir().unwrap();
    assert!(write_synth(&empty.path().join("out"), &SynthConfig { count: 0, ..cfg }).is_err());
    assert!(!empty.path().join("out").exists());
}
