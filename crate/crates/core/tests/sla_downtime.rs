use chrono::Duration;
use itil_forge::exact::Rational;
use itil_forge::notifications::OutageRecord;
use itil_forge::period::Period;
use itil_forge::sla::compute_downtime;
use itil_forge::Timestamp;
use proptest::prelude::*;

// Intervals land in a window straddling the start of 2016Q2.
fn window_start() -> Timestamp {
    "2016-03-31T00:00:00Z".parse().unwrap()
}
const WINDOW_MIN: i64 = 3 * 24 * 60;

fn outage(service: usize, start: i64, len: Option<i64>) -> OutageRecord {
    let start_ts = window_start() + Duration::minutes(start);
    OutageRecord {
        service: format!("svc{service}"),
        vendor_id: None,
        start: start_ts,
        end: len.map(|l| start_ts + Duration::minutes(l)),
        alternate_endpoint: None,
        start_notice: format!("ntf{start}").into(),
        end_notice: None,
    }
}

/// Minutes covered by at least one closed outage, per service, inside the period.
fn oracle(outages: &[OutageRecord], period: &Period) -> i64 {
    let mut covered = vec![[false; 3]; WINDOW_MIN as usize * 2];
    for o in outages {
        let Some(end) = o.end else { continue };
        let svc: usize = o.service[3..].parse().unwrap();
        let mut t = o.start;
        while t < end {
            if t >= period.start() && t < period.end() {
                covered[((t - window_start()).num_minutes()) as usize][svc] = true;
            }
            t += Duration::minutes(1);
        }
    }
    covered.iter().flatten().filter(|&&c| c).count() as i64
}

proptest! {
    #[test]
    fn downtime_is_the_clipped_union_per_service(
        raw in prop::collection::vec((0usize..3, 0..WINDOW_MIN, prop::option::weighted(0.9, 0i64..600)), 0..25)
    ) {
        let outages: Vec<_> = raw.iter().map(|&(s, start, len)| outage(s, start, len)).collect();
        let q2 = Period::quarter(2016, 2).unwrap();
        prop_assert_eq!(compute_downtime(&outages, &q2).unwrap(), Rational::from_integer(oracle(&outages, &q2)));
    }
}

#[test]
fn seconds_are_kept_as_exact_fractions() {
    let mut o = outage(0, 24 * 60, Some(0));
    o.end = Some(o.start + Duration::seconds(90));
    let q2 = Period::quarter(2016, 2).unwrap();
    assert_eq!(compute_downtime([&o], &q2).unwrap(), Rational::new(3, 2));
}

#[test]
fn outage_ending_before_it_starts_is_rejected() {
    let o = outage(0, 2000, Some(-5));
    assert!(compute_downtime([&o], &Period::quarter(2016, 2).unwrap()).is_err());
}
