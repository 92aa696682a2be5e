use serde::{Deserialize, Serialize};

/// Host description stored in the campaign header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub cpu: String,
    pub cores: usize,
    pub memory: String,
    pub os: String,
    pub arch: String,
}

fn first_field(text: &str, key: &str) -> Option<String> {
    text.lines()
        .find(|l| l.split(':').next().is_some_and(|k| k.trim() == key))
        .and_then(|l| l.split_once(':'))
        .map(|(_, v)| v.trim().to_string())
}

impl Environment {
    pub fn capture() -> Self {
        let cpuinfo = std::fs::read_to_string("/proc/cpuinfo").unwrap_or_default();
        let meminfo = std::fs::read_to_string("/proc/meminfo").unwrap_or_default();
        let release = std::fs::read_to_string("/etc/os-release").unwrap_or_default();
        let kernel = std::fs::read_to_string("/proc/sys/kernel/osrelease").unwrap_or_default();
        let name = release
            .lines()
            .find_map(|l| l.strip_prefix("PRETTY_NAME="))
            .map(|v| v.trim_matches('"').to_string())
            .unwrap_or_else(|| std::env::consts::OS.to_string());
        let os = match kernel.trim() {
            "" => name,
            k => format!("{name} (kernel {k})"),
        };
        Environment {
            cpu: first_field(&cpuinfo, "model name").unwrap_or_else(|| "unknown".into()),
            cores: std::thread::available_parallelism().map_or(1, |n| n.get()),
            memory: first_field(&meminfo, "MemTotal").unwrap_or_else(|| "unknown".into()),
            os,
            arch: std::env::consts::ARCH.to_string(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_proc_style_fields() {
        let text = "processor\t: 0\nmodel name\t: Test CPU @ 3.0GHz\nflags\t: a:b\n";
        assert_eq!(first_field(text, "model name").as_deref(), Some("Test CPU @ 3.0GHz"));
        assert_eq!(first_field(text, "missing"), None);
        let env = Environment::capture();
        assert!(env.cores >= 1);
        assert!(!env.os.is_empty());
    }
}
