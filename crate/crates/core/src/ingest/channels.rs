use std::collections::BTreeMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{ChannelMeta, Medium, Ownership};
use crate::error::{Error, Result};

/// Group key used for channels missing from the registry.
pub const UNKNOWN_GROUP: &str = "unknown";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupBy {
    #[default]
    None,
    Ownership,
    Medium,
    Channel,
}

impl FromStr for GroupBy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(GroupBy::None),
            "ownership" => Ok(GroupBy::Ownership),
            "medium" => Ok(GroupBy::Medium),
            "channel" => Ok(GroupBy::Channel),
            other => Err(Error::Config(format!(
                "unknown group_by `{other}` (expected none, ownership, medium or channel)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ChannelRegistry {
    channels: BTreeMap<String, ChannelMeta>,
}

impl ChannelRegistry {
    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let list: Vec<ChannelMeta> =
            serde_json::from_slice(bytes).map_err(|e| Error::parse("channel registry", &e))?;
        Self::from_channels(list)
    }

    pub fn from_channels(list: Vec<ChannelMeta>) -> Result<Self> {
        let mut channels = BTreeMap::new();
        for c in list {
            if channels.contains_key(&c.channel_id) {
                return Err(Error::DuplicateChannel(c.channel_id));
            }
            channels.insert(c.channel_id.clone(), c);
        }
        Ok(ChannelRegistry { channels })
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    pub fn get(&self, channel_id: &str) -> Option<&ChannelMeta> {
        self.channels.get(channel_id)
    }

    /// Group key of a channel. `None` for ungrouped runs; unregistered
    /// channels fall into [`UNKNOWN_GROUP`] except when grouping by channel.
    pub fn group_key(&self, channel_id: &str, group_by: GroupBy) -> Option<String> {
        let meta = self.get(channel_id);
        match group_by {
            GroupBy::None => None,
            GroupBy::Channel => Some(channel_id.to_string()),
            GroupBy::Ownership => Some(match meta.map(|m| m.ownership) {
                Some(Ownership::Public) => "public".into(),
                Some(Ownership::Private) => "private".into(),
                None => UNKNOWN_GROUP.into(),
            }),
            GroupBy::Medium => Some(match meta.map(|m| m.medium) {
                Some(Medium::Tv) => "tv".into(),
                Some(Medium::Radio) => "radio".into(),
                None => UNKNOWN_GROUP.into(),
            }),
        }
    }
}
