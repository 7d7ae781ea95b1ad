//! JSON output with every float written to 17 significant digits, so
//! repeated runs produce byte-identical files that round-trip exactly.

use std::io;

use serde::Serialize;
use serde_json::ser::Formatter;

struct Fixed17;

impl Formatter for Fixed17 {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        write!(writer, "{:.16e}", value as f64)
    }
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Fixed17);
    value.serialize(&mut ser).expect("reports serialize");
    let mut s = String::from_utf8(buf).expect("serde_json writes utf-8");
    s.push('\n');
    s
}
