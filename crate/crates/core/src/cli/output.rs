use std::fmt::Display;
use std::io::{self, Write};

use clap::ValueEnum;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum OutputMode {
    /// Narrated, for people.
    #[default]
    Human,
    /// One `key=value` per line, nothing else.
    MachineLines,
}

/// Writes results in the selected mode. Prose only appears in human mode.
pub struct Report<'a> {
    mode: OutputMode,
    out: &'a mut dyn Write,
}

impl<'a> Report<'a> {
    pub fn new(mode: OutputMode, out: &'a mut dyn Write) -> Self {
        Report { mode, out }
    }

    /// Human-only narration.
    pub fn say(&mut self, text: impl Display) -> io::Result<()> {
        match self.mode {
            OutputMode::Human => writeln!(self.out, "{text}"),
            OutputMode::MachineLines => Ok(()),
        }
    }

    /// A named value: `label: value` for humans, `key=value` for machines.
    pub fn field(&mut self, key: &str, label: &str, value: impl Display) -> io::Result<()> {
        match self.mode {
            OutputMode::Human => writeln!(self.out, "{label}: {value}"),
            OutputMode::MachineLines => writeln!(self.out, "{key}={value}"),
        }
    }

    /// Human text paired with its machine equivalent.
    pub fn either(
        &mut self,
        human: impl Display,
        key: &str,
        value: impl Display,
    ) -> io::Result<()> {
        match self.mode {
            OutputMode::Human => writeln!(self.out, "{human}"),
            OutputMode::MachineLines => writeln!(self.out, "{key}={value}"),
        }
    }
}
