//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

use finsler_core::validation::{run_criterion, DEFAULT_SEED};

fn criterion(id: u8) {
    let result = run_criterion(id, DEFAULT_SEED);
    println!("{}", result.summary());
    assert!(result.passed(), "{}", result.summary());
}

#[test]
fn criterion_01_lie_group_one_form_components() {
    criterion(1);
}

#[test]
fn criterion_02_lie_group_curvature_verdicts() {
    criterion(2);
}

#[test]
fn criterion_03_fish_tank() {
    criterion(3);
}

#[test]
fn criterion_04_sphere_randers() {
    criterion(4);
}

#[test]
fn criterion_05_mw_identities() {
    criterion(5);
}

#[test]
fn criterion_06_unicorn_family() {
    criterion(6);
}

#[test]
fn criterion_07_dual_routes() {
    criterion(7);
}

#[test]
fn criterion_08_two_dimensional_identities() {
    criterion(8);
}

#[test]
fn criterion_09_bao_shen() {
    criterion(9);
}

#[test]
fn criterion_10_proj_sphere_killing() {
    criterion(10);
}

#[test]
fn criterion_11_norm_gradient_identity() {
    criterion(11);
}

#[test]
fn criterion_12_zermelo() {
    criterion(12);
}

#[test]
fn criterion_13_structural_invariants() {
    criterion(13);
}
