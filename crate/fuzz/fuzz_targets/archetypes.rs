#![no_main]

use libfuzzer_sys::fuzz_target;
use traitsim::model::ArchetypeTable;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(table) = ArchetypeTable::parse(s) {
            let again = ArchetypeTable::parse(&table.to_text()).expect("rendered table parses");
            assert_eq!(again, table);
        }
    }
});
