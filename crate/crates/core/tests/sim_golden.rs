mod golden;

#[test]
fn decoder_truth_table() {
    golden::decoder_truth_table();
}

#[test]
fn alu_truth_table() {
    golden::alu_truth_table();
}

#[test]
fn counter_ten_cycles() {
    golden::counter_ten_cycles();
}

#[test]
fn sequence_detector_ten_cycles() {
    golden::sequence_detector_ten_cycles();
}

#[test]
fn traffic_light_ten_cycles() {
    golden::traffic_light_ten_cycles();
}

#[test]
fn nonblocking_order_is_irrelevant() {
    golden::nonblocking_order_is_irrelevant();
}

#[test]
fn nonblocking_swap_fixture() {
    golden::nonblocking_swap_fixture();
}
