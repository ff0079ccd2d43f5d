use rfsliding::harness::config::RunConfig;
use rfsliding::harness::csv::format_trace_csv;
use rfsliding::harness::experiment::execute;

fn strip_elapsed(csv: &str) -> Vec<String> {
    csv.lines()
        .map(|l| l.rsplit_once(',').map(|(head, _)| head.to_string()).unwrap_or_default())
        .collect()
}

#[test]
fn same_seed_same_csv() {
    for body in [
        "problem = qp\nn = 10\nN = 15\nsigma = 0.7\noutput = a.csv",
        "problem = portfolio\nn = 30\nN = 10\nsigma = 0.2\noutput = a.csv",
        "problem = tv\nwidth = 6\nheight = 6\nN = 6\nsigma = 0.1\neta = 0.02\noutput = a.csv",
    ] {
        let cfg = RunConfig::parse(body).unwrap();
        let a = format_trace_csv(&execute(&cfg, 9).unwrap().trace);
        let b = format_trace_csv(&execute(&cfg, 9).unwrap().trace);
        assert_eq!(strip_elapsed(&a), strip_elapsed(&b));
        let c = format_trace_csv(&execute(&cfg, 10).unwrap().trace);
        assert_ne!(strip_elapsed(&a), strip_elapsed(&c), "seed had no effect for {body}");
    }
}
