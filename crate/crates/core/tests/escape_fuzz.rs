// SPDX-License-Identifier: Apache-2.0

mod common;

#[test]
fn fifty_smuggling_programs_never_escape() {
    let (guarded, contained) = common::smuggle::run_suite(50);
    assert!(guarded > 0 && contained > 0);
    assert_eq!(guarded + contained, 100);
}
