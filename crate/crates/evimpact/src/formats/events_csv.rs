use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use evimpact_core::events::{Event, EventStream, Polarity};

use crate::error::{io_err, FormatError, Result};

pub const EVENTS_HEADER: [&str; 4] = ["t_us", "x", "y", "p"];

fn parse_err(line: u64, message: impl Into<String>) -> FormatError {
    FormatError::Parse {
        line,
        message: message.into(),
    }
}

fn csv_err(e: csv::Error) -> FormatError {
    let line = e.position().map_or(0, |p| p.line());
    parse_err(line, e.to_string())
}

/// Parses an event CSV for a `width x height` sensor. The stream lasts
/// until its latest event.
pub fn parse_events_csv(input: impl Read, width: u32, height: u32) -> Result<EventStream> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let header = rdr.headers().map_err(csv_err)?;
    if header.iter().ne(EVENTS_HEADER) {
        return Err(parse_err(1, format!("expected header {}", EVENTS_HEADER.join(","))));
    }
    let mut events = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 4 {
            return Err(parse_err(line, format!("expected 4 fields, found {}", record.len())));
        }
        let field = |i: usize| -> Result<u64> {
            record[i]
                .parse::<u64>()
                .map_err(|e| parse_err(line, format!("{} = {:?}: {e}", EVENTS_HEADER[i], &record[i])))
        };
        let t = field(0)?;
        let (x, y) = (field(1)?, field(2)?);
        let p = field(3)?;
        let p = u8::try_from(p)
            .ok()
            .and_then(Polarity::from_bit)
            .ok_or_else(|| parse_err(line, format!("polarity must be 0 or 1, found {p}")))?;
        if x >= width as u64 || y >= height as u64 {
            return Err(parse_err(
                line,
                format!("pixel ({x}, {y}) outside {width}x{height} sensor"),
            ));
        }
        events.push(Event::new(t, x as u32, y as u32, p));
    }
    Ok(EventStream::new(width, height, events, None)?)
}

pub fn read_events_csv(path: impl AsRef<Path>, width: u32, height: u32) -> Result<EventStream> {
    let path = path.as_ref();
    let file = File::open(path).map_err(io_err(path))?;
    parse_events_csv(file, width, height)
}

pub fn write_events_csv(stream: &EventStream, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    let mut write = || -> std::io::Result<()> {
        writeln!(out, "{}", EVENTS_HEADER.join(","))?;
        for e in stream.events() {
            writeln!(out, "{},{},{},{}", e.t, e.x, e.y, e.p.bit())?;
        }
        out.flush()
    };
    write().map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sorts_rows_by_time() {
        let s = parse_events_csv("t_us,x,y,p\n50,10,20,1\n30,5,5,0\n".as_bytes(), 64, 64).unwrap();
        let e = s.events();
        assert_eq!(e.len(), 2);
        assert_eq!((e[0].t, e[0].p), (30, Polarity::Negative));
        assert_eq!((e[1].t, e[1].p), (50, Polarity::Positive));
        assert_eq!(s.duration_us(), 50);
    }

    #[test]
    fn header_only_is_empty() {
        let s = parse_events_csv("t_us,x,y,p\n".as_bytes(), 8, 8).unwrap();
        assert!(s.is_empty());
        assert_eq!(s.duration_us(), 0);
    }

    #[test]
    fn errors_name_the_line() {
        let cases = [
            "t_us,x,y,p\n1,1,1,1\n2,8,1,1\n",
            "t_us,x,y,p\n1,1,1,1\n2,1,1\n",
            "t_us,x,y,p\n1,1,1,1\n2,a,1,1\n",
            "t_us,x,y,p\n1,1,1,1\n2,1,1,2\n",
            "t_us,x,y,p\n1,1,1,1\n-2,1,1,1\n",
        ];
        for c in cases {
            match parse_events_csv(c.as_bytes(), 8, 8) {
                Err(FormatError::Parse { line, .. }) => assert_eq!(line, 3, "{c}"),
                other => panic!("{c}: {other:?}"),
            }
        }
    }

    #[test]
    fn wrong_header_rejected() {
        assert!(parse_events_csv("t,x,y,p\n".as_bytes(), 8, 8).is_err());
    }
}
