//! Persistence in a single redb file.
//!
//! Records are stored as JSON: the directory under one key, each group space
//! under its group id, and the account table under one key.

use std::path::Path;

use deme_core::{Commit, Directory, Error, GroupSpace, Result, Storage};
use redb::{Database, ReadableTable, TableDefinition};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::accounts::AccountRecord;

const META: TableDefinition<&str, &[u8]> = TableDefinition::new("meta");
const SPACES: TableDefinition<&[u8; 16], &[u8]> = TableDefinition::new("spaces");

const DIRECTORY_KEY: &str = "directory";
const ACCOUNTS_KEY: &str = "accounts";

pub struct RedbStore {
    db: Database,
}

/// Everything read back at startup.
#[derive(Default)]
pub struct Loaded {
    pub directory: Directory,
    pub spaces: Vec<GroupSpace>,
    pub accounts: AccountRecord,
}

fn storage<E: std::fmt::Display>(e: E) -> Error {
    Error::Storage(e.to_string())
}

fn encode<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    serde_json::to_vec(value).map_err(storage)
}

fn decode<T: DeserializeOwned>(bytes: &[u8], what: &str) -> Result<T> {
    serde_json::from_slice(bytes).map_err(|e| Error::Storage(format!("corrupt {what} record: {e}")))
}

impl RedbStore {
    pub fn open(path: &Path) -> Result<Self> {
        let db = Database::create(path).map_err(storage)?;
        let txn = db.begin_write().map_err(storage)?;
        txn.open_table(META).map_err(storage)?;
        txn.open_table(SPACES).map_err(storage)?;
        txn.commit().map_err(storage)?;
        Ok(RedbStore { db })
    }

    pub fn load(&self) -> Result<Loaded> {
        let txn = self.db.begin_read().map_err(storage)?;
        let meta = txn.open_table(META).map_err(storage)?;
        let directory = match meta.get(DIRECTORY_KEY).map_err(storage)? {
            Some(v) => decode(v.value(), "directory")?,
            None => Directory::default(),
        };
        let accounts = match meta.get(ACCOUNTS_KEY).map_err(storage)? {
            Some(v) => decode(v.value(), "account")?,
            None => AccountRecord::default(),
        };
        let table = txn.open_table(SPACES).map_err(storage)?;
        let mut spaces = Vec::new();
        for entry in table.iter().map_err(storage)? {
            let (_, v) = entry.map_err(storage)?;
            spaces.push(decode(v.value(), "group")?);
        }
        Ok(Loaded {
            directory,
            spaces,
            accounts,
        })
    }

    pub fn save_accounts(&self, accounts: &AccountRecord) -> Result<()> {
        let bytes = encode(accounts)?;
        let txn = self.db.begin_write().map_err(storage)?;
        {
            let mut meta = txn.open_table(META).map_err(storage)?;
            meta.insert(ACCOUNTS_KEY, bytes.as_slice()).map_err(storage)?;
        }
        txn.commit().map_err(storage)
    }
}

impl Storage for RedbStore {
    fn commit(&self, commit: Commit<'_>) -> Result<()> {
        let directory = commit.directory.map(encode).transpose()?;
        let spaces = commit
            .spaces
            .iter()
            .map(|s| Ok((*s.group_id.as_bytes(), encode(s)?)))
            .collect::<Result<Vec<_>>>()?;
        let txn = self.db.begin_write().map_err(storage)?;
        {
            if let Some(bytes) = &directory {
                let mut meta = txn.open_table(META).map_err(storage)?;
                meta.insert(DIRECTORY_KEY, bytes.as_slice()).map_err(storage)?;
            }
            let mut table = txn.open_table(SPACES).map_err(storage)?;
            for (id, bytes) in &spaces {
                table.insert(id, bytes.as_slice()).map_err(storage)?;
            }
        }
        txn.commit().map_err(storage)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use deme_core::GroupId;

    #[test]
    fn commits_survive_reopening() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("deme.redb");
        let mut directory = Directory::default();
        directory.register_user("Ayşe", Some("ayse@example.org")).unwrap();
        let space = GroupSpace::new(GroupId::new());
        {
            let store = RedbStore::open(&path).unwrap();
            store
                .commit(Commit {
                    directory: Some(&directory),
                    spaces: vec![&space],
                })
                .unwrap();
        }
        let loaded = RedbStore::open(&path).unwrap().load().unwrap();
        assert_eq!(loaded.directory, directory);
        assert_eq!(loaded.spaces, vec![space]);
        assert!(loaded.accounts.credentials.is_empty());
    }
}
