//! Serialized form of a sub-share.
//!
//! A sub-share file is a fixed 46-byte header, a bit-packed list of
//! (index, value) records, and a CRC-32 trailer. Records store the
//! block-local linear index of each nonzero in just enough bits for the
//! block's element count, followed by the value in just enough bits for the
//! field, packed most significant bit first with zero padding to the next
//! byte boundary. Indices are strictly increasing, so the decoded entry
//! list is already in canonical order.
//!
//! Header layout (little endian integers):
//!
//! ```text
//! offset  size  field
//!      0     4  magic "SPSH"
//!      4     1  format version, currently 1
//!      5     1  field kind: 0 prime, 1 binary
//!      6     8  prime q, or binary extension degree m
//!     14     8  source rows r
//!     22     8  source cols l
//!     30     4  block count n
//!     34     4  block index t
//!     38     8  record count
//! ```

use crate::error::{Error, Result};
use crate::field::FieldOrder;
use crate::placement::ceil_log2_u128;
use crate::sharing::{Entry, SparseMatrix};

pub const MAGIC: [u8; 4] = *b"SPSH";
pub const FORMAT_VERSION: u8 = 1;
pub const HEADER_LEN: usize = 46;

const KIND_PRIME: u8 = 0;
const KIND_BINARY: u8 = 1;

/// Appends bits to a byte buffer, most significant bit first.
#[derive(Debug, Default)]
pub struct BitWriter {
    bytes: Vec<u8>,
    bit_len: usize,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Write the low `bits` bits of `value`, high bit first.
    pub fn write_bits(&mut self, value: u64, bits: u32) {
        debug_assert!(bits <= 64);
        let value = if bits < 64 {
            value & ((1u64 << bits) - 1)
        } else {
            value
        };
        let mut remaining = bits;
        while remaining > 0 {
            let used = (self.bit_len % 8) as u32;
            if used == 0 {
                self.bytes.push(0);
            }
            let free = 8 - used;
            let take = remaining.min(free);
            let chunk = ((value >> (remaining - take)) & ((1u64 << take) - 1)) as u8;
            *self.bytes.last_mut().unwrap() |= chunk << (free - take);
            self.bit_len += take as usize;
            remaining -= take;
        }
    }

    pub fn bit_len(&self) -> usize {
        self.bit_len
    }

    /// The buffer, zero padded to a whole number of bytes.
    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }
}

/// Reads back what [`BitWriter`] wrote.
#[derive(Debug)]
pub struct BitReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    /// Next `bits` bits as the low bits of a u64, or None past the end.
    pub fn read_bits(&mut self, bits: u32) -> Option<u64> {
        debug_assert!(bits <= 64);
        if self.pos + bits as usize > self.bytes.len() * 8 {
            return None;
        }
        let mut out = 0u64;
        let mut remaining = bits;
        while remaining > 0 {
            let byte = self.bytes[self.pos / 8];
            let used = (self.pos % 8) as u32;
            let avail = 8 - used;
            let take = remaining.min(avail);
            let chunk = (byte >> (avail - take)) & ((1u16 << take) - 1) as u8;
            out = (out << take) | chunk as u64;
            self.pos += take as usize;
            remaining -= take;
        }
        Some(out)
    }

    pub fn bits_remaining(&self) -> usize {
        self.bytes.len() * 8 - self.pos
    }
}

const fn crc32_table() -> [u32; 256] {
    let mut table = [0u32; 256];
    let mut i = 0;
    while i < 256 {
        let mut c = i as u32;
        let mut k = 0;
        while k < 8 {
            c = if c & 1 != 0 {
                0xedb8_8320 ^ (c >> 1)
            } else {
                c >> 1
            };
            k += 1;
        }
        table[i] = c;
        i += 1;
    }
    table
}

static CRC_TABLE: [u32; 256] = crc32_table();

/// CRC-32 (IEEE, reflected).
pub fn crc32(data: &[u8]) -> u32 {
    let mut c = 0xffff_ffffu32;
    for &b in data {
        c = CRC_TABLE[((c ^ b as u32) & 0xff) as usize] ^ (c >> 8);
    }
    c ^ 0xffff_ffff
}

/// Everything the fixed-size header records about a sub-share.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubShareHeader {
    pub field: FieldOrder,
    pub source_rows: u64,
    pub source_cols: u64,
    pub n: u32,
    pub index: u32,
    pub count: u64,
}

impl SubShareHeader {
    /// Rows per block after padding the source to a multiple of n.
    pub fn block_rows(&self) -> u64 {
        self.source_rows.div_ceil(self.n as u64)
    }

    pub fn block_elements(&self) -> u128 {
        self.block_rows() as u128 * self.source_cols as u128
    }

    /// Bits per stored index.
    pub fn index_bits(&self) -> u32 {
        ceil_log2_u128(self.block_elements().max(1))
    }

    /// Bits per stored value.
    pub fn value_bits(&self) -> u32 {
        self.field.value_bits()
    }

    /// Record bits before byte padding: count * (index + value width).
    pub fn payload_bits(&self) -> u128 {
        self.count as u128 * (self.index_bits() + self.value_bits()) as u128
    }

    fn payload_len(&self) -> u128 {
        self.payload_bits().div_ceil(8)
    }

    fn to_bytes(self) -> [u8; HEADER_LEN] {
        let mut out = [0u8; HEADER_LEN];
        out[0..4].copy_from_slice(&MAGIC);
        out[4] = FORMAT_VERSION;
        let (kind, param) = match self.field {
            FieldOrder::Prime(q) => (KIND_PRIME, q),
            FieldOrder::Binary(m) => (KIND_BINARY, m as u64),
        };
        out[5] = kind;
        out[6..14].copy_from_slice(&param.to_le_bytes());
        out[14..22].copy_from_slice(&self.source_rows.to_le_bytes());
        out[22..30].copy_from_slice(&self.source_cols.to_le_bytes());
        out[30..34].copy_from_slice(&self.n.to_le_bytes());
        out[34..38].copy_from_slice(&self.index.to_le_bytes());
        out[38..46].copy_from_slice(&self.count.to_le_bytes());
        out
    }

    fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let err = |offset: usize, reason: String| Error::Parse { offset, reason };
        if bytes.len() < HEADER_LEN {
            return Err(err(
                bytes.len(),
                format!("truncated header: {} of {HEADER_LEN} bytes", bytes.len()),
            ));
        }
        if bytes[0..4] != MAGIC {
            return Err(err(0, format!("bad magic {:02x?}", &bytes[0..4])));
        }
        if bytes[4] != FORMAT_VERSION {
            return Err(err(4, format!("unsupported format version {}", bytes[4])));
        }
        let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
        let param = u64_at(6);
        let field = match bytes[5] {
            KIND_PRIME => FieldOrder::prime(param)
                .map_err(|e| err(6, format!("bad prime order {param}: {e}")))?,
            KIND_BINARY => {
                let m = u32::try_from(param)
                    .map_err(|_| err(6, format!("bad extension degree {param}")))?;
                FieldOrder::binary(m)
                    .map_err(|e| err(6, format!("bad extension degree {param}: {e}")))?
            }
            k => return Err(err(5, format!("unknown field kind {k}"))),
        };
        let source_rows = u64_at(14);
        let source_cols = u64_at(22);
        let n = u32_at(30);
        let index = u32_at(34);
        let count = u64_at(38);
        if source_rows == 0 {
            return Err(err(14, "source has zero rows".into()));
        }
        if source_cols == 0 || source_cols > u32::MAX as u64 {
            return Err(err(22, format!("bad column count {source_cols}")));
        }
        if n == 0 {
            return Err(err(30, "zero block count".into()));
        }
        if index >= n {
            return Err(err(34, format!("block index {index} of {n}")));
        }
        let header = SubShareHeader {
            field,
            source_rows,
            source_cols,
            n,
            index,
            count,
        };
        if header.block_rows() > u32::MAX as u64 {
            return Err(err(
                14,
                format!("block rows {} overflow", header.block_rows()),
            ));
        }
        if count as u128 > header.block_elements() {
            return Err(err(
                38,
                format!(
                    "{count} records in a block of {} elements",
                    header.block_elements()
                ),
            ));
        }
        Ok(header)
    }
}

/// Serialize one block of a share split n ways.
pub fn encode_sub_share(
    block: &SparseMatrix,
    source_rows: u64,
    n: u32,
    index: u32,
) -> Result<Vec<u8>> {
    if n == 0 || index >= n {
        return Err(Error::InvalidPlanParams {
            reason: format!("block index {index} of {n}"),
        });
    }
    let expect_rows = source_rows.div_ceil(n as u64);
    if block.rows() as u64 != expect_rows || source_rows == 0 {
        return Err(Error::DimensionMismatch {
            expected: (expect_rows, block.cols() as u64),
            got: (block.rows() as u64, block.cols() as u64),
        });
    }
    let header = SubShareHeader {
        field: block.field(),
        source_rows,
        source_cols: block.cols() as u64,
        n,
        index,
        count: block.nnz(),
    };
    let ib = header.index_bits();
    let vb = header.value_bits();
    let mut w = BitWriter::new();
    let cols = block.cols() as u64;
    for e in block.entries() {
        w.write_bits(e.row as u64 * cols + e.col as u64, ib);
        w.write_bits(e.value, vb);
    }
    let payload = w.into_bytes();
    let crc = crc32(&payload);
    let mut out = Vec::with_capacity(HEADER_LEN + payload.len() + 4);
    out.extend_from_slice(&header.to_bytes());
    out.extend_from_slice(&payload);
    out.extend_from_slice(&crc.to_le_bytes());
    Ok(out)
}

/// Parse just the header, without touching the records.
pub fn peek_header(bytes: &[u8]) -> Result<SubShareHeader> {
    SubShareHeader::from_bytes(bytes)
}

/// Parse and validate a serialized sub-share.
pub fn decode_sub_share(bytes: &[u8]) -> Result<(SubShareHeader, SparseMatrix)> {
    let err = |offset: usize, reason: String| Error::Parse { offset, reason };
    let header = SubShareHeader::from_bytes(bytes)?;
    let payload_len = header.payload_len();
    let expect = HEADER_LEN as u128 + payload_len + 4;
    if bytes.len() as u128 != expect {
        return Err(err(
            38,
            format!(
                "count {} implies a {expect} byte file, got {}",
                header.count,
                bytes.len()
            ),
        ));
    }
    let crc_at = bytes.len() - 4;
    let stored = u32::from_le_bytes(bytes[crc_at..].try_into().unwrap());
    let computed = crc32(&bytes[HEADER_LEN..crc_at]);
    if stored != computed {
        return Err(err(
            crc_at,
            format!("crc mismatch: stored {stored:08x}, computed {computed:08x}"),
        ));
    }
    let payload = &bytes[HEADER_LEN..crc_at];
    let ib = header.index_bits();
    let vb = header.value_bits();
    let cols = header.source_cols;
    let elements = header.block_elements();
    let mut r = BitReader::new(payload);
    let mut entries = Vec::with_capacity(header.count as usize);
    let mut prev: Option<u128> = None;
    for k in 0..header.count {
        let record_offset = HEADER_LEN + (k as u128 * (ib + vb) as u128 / 8) as usize;
        let idx = r.read_bits(ib).unwrap() as u128;
        let value = r.read_bits(vb).unwrap();
        if idx >= elements {
            return Err(err(
                record_offset,
                format!("record {k}: index {idx} outside block of {elements}"),
            ));
        }
        if prev.is_some_and(|p| idx <= p) {
            return Err(err(
                record_offset,
                format!("record {k}: index {idx} not strictly increasing"),
            ));
        }
        prev = Some(idx);
        if value == 0 {
            return Err(err(record_offset, format!("record {k}: stored zero value")));
        }
        if !header.field.contains(value) {
            return Err(err(
                record_offset,
                format!("record {k}: value {value} outside {}", header.field),
            ));
        }
        entries.push(Entry {
            row: (idx / cols as u128) as u32,
            col: (idx % cols as u128) as u32,
            value,
        });
    }
    if r.bits_remaining() > 0 && r.read_bits(r.bits_remaining() as u32).unwrap() != 0 {
        return Err(err(crc_at - 1, "nonzero padding bits".into()));
    }
    let m = SparseMatrix::new(
        header.block_rows() as u32,
        header.source_cols as u32,
        header.field,
        entries,
    )?;
    Ok((header, m))
}

/// Serialize a whole matrix as a single-block file.
pub fn encode_matrix(m: &SparseMatrix) -> Result<Vec<u8>> {
    encode_sub_share(m, m.rows() as u64, 1, 0)
}

/// Parse a single-block file back into a matrix.
pub fn decode_matrix(bytes: &[u8]) -> Result<SparseMatrix> {
    let (header, m) = decode_sub_share(bytes)?;
    if header.n != 1 {
        return Err(Error::Parse {
            offset: 30,
            reason: format!(
                "expected a single-block file, found block {} of {}",
                header.index, header.n
            ),
        });
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::leakage::{ConditionalPmf, SourceModel};
    use crate::placement::partition_share;
    use crate::sharing::{generate_source, make_shares};

    fn f5() -> FieldOrder {
        FieldOrder::prime(5).unwrap()
    }

    #[test]
    fn crc_reference_vectors() {
        assert_eq!(crc32(b""), 0);
        assert_eq!(crc32(b"123456789"), 0xcbf4_3926);
        assert_eq!(crc32(b"\x00\x00\x00\x00"), 0x2144_df1c);
    }

    #[test]
    fn bit_packing_is_msb_first() {
        let mut w = BitWriter::new();
        w.write_bits(0b101, 3);
        w.write_bits(0b1, 1);
        w.write_bits(0xab, 8);
        assert_eq!(w.bit_len(), 12);
        assert_eq!(w.into_bytes(), vec![0xba, 0xb0]);
    }

    #[test]
    fn bit_round_trip() {
        let widths = [1u32, 3, 7, 8, 11, 16, 33, 63, 64];
        let mut rng = crate::rng::EntryRng::from_seed(42);
        let values: Vec<(u64, u32)> = (0..200)
            .map(|i| {
                let bits = widths[i % widths.len()];
                let v = if bits == 64 {
                    rng.next_u64()
                } else {
                    rng.next_u64() & ((1u64 << bits) - 1)
                };
                (v, bits)
            })
            .collect();
        let mut w = BitWriter::new();
        for &(v, bits) in &values {
            w.write_bits(v, bits);
        }
        let bytes = w.into_bytes();
        let mut r = BitReader::new(&bytes);
        for &(v, bits) in &values {
            assert_eq!(r.read_bits(bits), Some(v));
        }
        assert!(r.bits_remaining() < 8);
        assert!(BitReader::new(&[0xff]).read_bits(9).is_none());
        assert_eq!(BitReader::new(&[]).read_bits(0), Some(0));
    }

    #[test]
    fn known_bytes_fixture() {
        // 2x2 over F5: entries (0,1)=3, (1,0)=2, (1,1)=4 at linear indices
        // 1, 2, 3, packed as 2 index bits + 3 value bits per record:
        // 01 011 | 10 010 | 11 100 -> 0101 1100 1011 100(0) -> 0x5c 0xb8
        let m = SparseMatrix::new(
            2,
            2,
            f5(),
            vec![
                Entry {
                    row: 0,
                    col: 1,
                    value: 3,
                },
                Entry {
                    row: 1,
                    col: 0,
                    value: 2,
                },
                Entry {
                    row: 1,
                    col: 1,
                    value: 4,
                },
            ],
        )
        .unwrap();
        let bytes = encode_matrix(&m).unwrap();
        let mut expect = Vec::new();
        expect.extend_from_slice(b"SPSH");
        expect.push(1);
        expect.push(0);
        expect.extend_from_slice(&5u64.to_le_bytes());
        expect.extend_from_slice(&2u64.to_le_bytes());
        expect.extend_from_slice(&2u64.to_le_bytes());
        expect.extend_from_slice(&1u32.to_le_bytes());
        expect.extend_from_slice(&0u32.to_le_bytes());
        expect.extend_from_slice(&3u64.to_le_bytes());
        expect.extend_from_slice(&[0x5c, 0xb8]);
        let crc = crc32(&[0x5c, 0xb8]);
        expect.extend_from_slice(&crc.to_le_bytes());
        assert_eq!(bytes, expect);
        let (header, back) = decode_sub_share(&bytes).unwrap();
        assert_eq!(back, m);
        assert_eq!(header.count, 3);
        assert_eq!(header.index_bits(), 2);
        assert_eq!(header.value_bits(), 3);
        assert_eq!(header.payload_bits(), 15);
    }

    #[test]
    fn empty_matrix_round_trip() {
        let m = SparseMatrix::zero(4, 4, f5()).unwrap();
        let bytes = encode_matrix(&m).unwrap();
        assert_eq!(bytes.len(), HEADER_LEN + 4);
        let back = decode_matrix(&bytes).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn single_element_block_needs_no_index_bits() {
        let m = SparseMatrix::new(
            1,
            1,
            f5(),
            vec![Entry {
                row: 0,
                col: 0,
                value: 4,
            }],
        )
        .unwrap();
        let bytes = encode_matrix(&m).unwrap();
        let (header, back) = decode_sub_share(&bytes).unwrap();
        assert_eq!(header.index_bits(), 0);
        assert_eq!(header.payload_bits(), 3);
        assert_eq!(back, m);
    }

    #[test]
    fn binary_field_header_stores_degree() {
        let f = FieldOrder::binary(8).unwrap();
        let m = SparseMatrix::new(
            3,
            3,
            f,
            vec![Entry {
                row: 2,
                col: 2,
                value: 255,
            }],
        )
        .unwrap();
        let bytes = encode_matrix(&m).unwrap();
        assert_eq!(bytes[5], 1);
        assert_eq!(u64::from_le_bytes(bytes[6..14].try_into().unwrap()), 8);
        let (header, back) = decode_sub_share(&bytes).unwrap();
        assert_eq!(header.field, f);
        assert_eq!(back, m);
    }

    #[test]
    fn partitioned_share_round_trip() {
        let field = FieldOrder::prime(257).unwrap();
        let src = SourceModel::new(field, 0.8).unwrap();
        let a = generate_source(50, 30, &src, 11).unwrap();
        let pmf = ConditionalPmf::new(field, 0.6, 0.1, 0.1).unwrap();
        let pair = make_shares(&a, &pmf, 12).unwrap();
        let blocks = partition_share(&pair.mask, 4).unwrap();
        for (t, block) in blocks.iter().enumerate() {
            let bytes = encode_sub_share(block, 50, 4, t as u32).unwrap();
            let (header, back) = decode_sub_share(&bytes).unwrap();
            assert_eq!(&back, block);
            assert_eq!(header.n, 4);
            assert_eq!(header.index, t as u32);
            assert_eq!(header.source_rows, 50);
            assert_eq!(header.block_rows(), 13);
            assert_eq!(
                header.payload_bits(),
                block.nnz() as u128 * (header.index_bits() + header.value_bits()) as u128
            );
        }
        assert!(encode_sub_share(&blocks[0], 50, 4, 4).is_err());
        assert!(encode_sub_share(&blocks[0], 40, 4, 0).is_err());
    }

    #[test]
    fn corruption_is_detected_with_offsets() {
        let m = SparseMatrix::new(
            2,
            2,
            f5(),
            vec![
                Entry {
                    row: 0,
                    col: 1,
                    value: 3,
                },
                Entry {
                    row: 1,
                    col: 0,
                    value: 2,
                },
            ],
        )
        .unwrap();
        let good = encode_matrix(&m).unwrap();
        let offset_of = |e: crate::error::Error| match e {
            Error::Parse { offset, .. } => offset,
            other => panic!("expected parse error, got {other:?}"),
        };

        let mut bad = good.clone();
        bad[46] ^= 0xff;
        assert_eq!(
            offset_of(decode_sub_share(&bad).unwrap_err()),
            good.len() - 4
        );

        let mut bad = good.clone();
        bad[0] = b'X';
        assert_eq!(offset_of(decode_sub_share(&bad).unwrap_err()), 0);

        let mut bad = good.clone();
        bad[4] = 9;
        assert_eq!(offset_of(decode_sub_share(&bad).unwrap_err()), 4);

        let mut bad = good.clone();
        bad[5] = 7;
        assert_eq!(offset_of(decode_sub_share(&bad).unwrap_err()), 5);

        let mut bad = good.clone();
        bad[6] = 4; // q = 4 is neither prime nor a stored degree
        assert_eq!(offset_of(decode_sub_share(&bad).unwrap_err()), 6);

        assert_eq!(offset_of(decode_sub_share(&good[..30]).unwrap_err()), 30);
        assert_eq!(
            offset_of(decode_sub_share(&good[..good.len() - 1]).unwrap_err()),
            38
        );
    }

    #[test]
    fn semantic_payload_errors() {
        // hand-build payloads with a consistent CRC so only the records are
        // at fault
        let build = |payload: &[u8], count: u64| {
            let header = SubShareHeader {
                field: f5(),
                source_rows: 2,
                source_cols: 2,
                n: 1,
                index: 0,
                count,
            };
            let mut bytes = Vec::new();
            bytes.extend_from_slice(&header.to_bytes());
            bytes.extend_from_slice(payload);
            let crc = crc32(payload);
            bytes.extend_from_slice(&crc.to_le_bytes());
            bytes
        };
        // indices 2 then 1: not increasing (10 010 01 011 -> 1001 0010 11)
        let bad = build(&[0x92, 0xc0], 2);
        assert!(matches!(
            decode_sub_share(&bad),
            Err(Error::Parse { reason, .. }) if reason.contains("increasing")
        ));
        // value 0 (01 000 -> 0100 0000)
        let bad = build(&[0x40], 1);
        assert!(matches!(
            decode_sub_share(&bad),
            Err(Error::Parse { reason, .. }) if reason.contains("zero value")
        ));
        // value 5 outside F5 (01 101)
        let bad = build(&[0x68], 1);
        assert!(matches!(
            decode_sub_share(&bad),
            Err(Error::Parse { reason, .. }) if reason.contains("outside")
        ));
        // nonzero padding after one good record (01 011 then junk bit)
        let bad = build(&[0x5c], 1);
        assert!(matches!(
            decode_sub_share(&bad),
            Err(Error::Parse { reason, .. }) if reason.contains("padding")
        ));
        // a good single record decodes (01 011 -> 0101 1000)
        let good = build(&[0x58], 1);
        assert!(decode_sub_share(&good).is_ok());
    }

    proptest::proptest! {
        #[test]
        fn round_trip_is_identity(
            kind in 0usize..4,
            rows in 1u32..10,
            cols in 1u32..10,
            seed in proptest::prelude::any::<u64>(),
            keep in 0.0f64..1.0,
        ) {
            let field = match kind {
                0 => FieldOrder::prime(5).unwrap(),
                1 => FieldOrder::prime(257).unwrap(),
                2 => FieldOrder::binary(4).unwrap(),
                _ => FieldOrder::binary(12).unwrap(),
            };
            let mut rng = crate::rng::EntryRng::from_seed(seed);
            let mut entries = Vec::new();
            for row in 0..rows {
                for col in 0..cols {
                    if rng.next_f64() < keep {
                        entries.push(Entry {
                            row,
                            col,
                            value: field.sample_nonzero(&mut rng),
                        });
                    }
                }
            }
            let m = SparseMatrix::new(rows, cols, field, entries).unwrap();
            let bytes = encode_matrix(&m).unwrap();
            let back = decode_matrix(&bytes).unwrap();
            proptest::prop_assert_eq!(back, m.clone());
            proptest::prop_assert_eq!(encode_matrix(&m).unwrap(), bytes);
        }
    }

    #[test]
    fn single_block_guard() {
        let field = f5();
        let src = SourceModel::new(field, 0.5).unwrap();
        let a = generate_source(4, 2, &src, 3).unwrap();
        let blocks = partition_share(&a, 2).unwrap();
        let bytes = encode_sub_share(&blocks[1], 4, 2, 1).unwrap();
        assert!(decode_matrix(&bytes).is_err());
        assert!(decode_sub_share(&bytes).is_ok());
    }
}
